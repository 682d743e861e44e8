from farplan.offload.kernel_offload import (
    Decision,
    KernelProfile,
    offload_decision,
    offload_metrics,
)

__all__ = ["Decision", "KernelProfile", "offload_decision", "offload_metrics"]
