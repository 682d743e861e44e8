"""
Standalone kernel offload model

Analytical go/no-go for running a memory-bound kernel on the device cores
next to far memory. The kernel's working set is made visible to the device
(allocate, copy, reconstruct) before it runs there; saving is measured net
of that work:

    t_overhead        = alloc_s + copy_s + reconstruct_s
    t_offload_total   = t_device_s + t_overhead
    saving            = t_baseline_s / t_offload_total
    overhead_fraction = t_overhead / t_offload_total

Profiles are read from the delimited kernel profile format:

    kernel_id,t_baseline_s,t_device_s,alloc_s,copy_bytes,reconstruct_s[,t_local_s]
"""

import csv
import io
import logging
import math
from enum import Enum
from importlib import resources
from pathlib import Path
from typing import List, Optional, Sequence, Union

from pydantic import BaseModel, ConfigDict, Field, ValidationError

from farplan.core.errors import FormatError
from farplan.core.platform_model import GB, PlatformSpec

logger = logging.getLogger(__name__)

PROFILE_HEADER = [
    "kernel_id",
    "t_baseline_s",
    "t_device_s",
    "alloc_s",
    "copy_bytes",
    "reconstruct_s",
]
OPTIONAL_COLUMNS = ["t_local_s"]


class KernelProfile(BaseModel):
    """Measured or back-solved timings for one kernel on one platform"""

    model_config = ConfigDict(frozen=True)

    kernel_id: str = "kernel"
    t_baseline_s: float = Field(gt=0.0)
    t_device_s: float = Field(gt=0.0)
    bytes_shared: int = Field(0, ge=0)
    copy_bw_GBps: float = Field(gt=0.0)
    alloc_s: float = Field(0.0, ge=0.0)
    reconstruct_s: float = Field(0.0, ge=0.0)
    t_local_s: Optional[float] = Field(None, gt=0.0)

    @classmethod
    def on_platform(cls, platform: PlatformSpec, **fields) -> "KernelProfile":
        """Take the copy bandwidth and default alloc/reconstruct from the platform"""
        overhead = platform.offload_overhead
        fields.setdefault("copy_bw_GBps", overhead.copy_bw_GBps)
        fields.setdefault("alloc_s", overhead.alloc_s)
        fields.setdefault("reconstruct_s", overhead.reconstruct_s)
        return cls(**fields)

    @property
    def copy_s(self) -> float:
        return self.bytes_shared / (self.copy_bw_GBps * GB)

    @property
    def t_overhead_s(self) -> float:
        return self.alloc_s + self.copy_s + self.reconstruct_s


class OffloadMetrics(BaseModel):
    model_config = ConfigDict(frozen=True)

    kernel_id: str
    t_overhead_s: float
    t_offload_total_s: float
    saving: float
    overhead_fraction: float
    relative_to_local: Optional[float] = None
    remote_slowdown: Optional[float] = None


class Decision(str, Enum):
    OFFLOAD = "Offload"
    STAY = "Stay"


def offload_metrics(k: KernelProfile) -> OffloadMetrics:
    overhead = k.t_overhead_s
    # t_device_s > 0 keeps total positive and the overhead share below 1
    total = k.t_device_s + overhead
    saving = k.t_baseline_s / total
    fraction = overhead / total
    relative, slowdown = None, None
    if k.t_local_s is not None:
        relative = total / k.t_local_s
        slowdown = k.t_baseline_s / k.t_local_s
    return OffloadMetrics(
        kernel_id=k.kernel_id,
        t_overhead_s=overhead,
        t_offload_total_s=total,
        saving=saving,
        overhead_fraction=fraction,
        relative_to_local=relative,
        remote_slowdown=slowdown,
    )


def offload_decision(
    k: KernelProfile, threshold: float = 1.0, overhead_cap: float = 0.10
) -> Decision:
    """Offload iff the net saving reaches threshold and overhead stays within cap"""
    if threshold < 1.0:
        raise ValueError(f"threshold must be >= 1, got {threshold}")
    if not 0.0 < overhead_cap <= 1.0:
        raise ValueError(f"overhead_cap must be in (0, 1], got {overhead_cap}")
    m = offload_metrics(k)
    worth_it = m.saving >= threshold and m.overhead_fraction <= overhead_cap
    decision = Decision.OFFLOAD if worth_it else Decision.STAY
    logger.debug(
        f"{k.kernel_id}: saving {m.saving:.3f}x, "
        f"overhead {m.overhead_fraction:.2%} -> {decision.value}"
    )
    return decision


# File formats

def parse_kernel_profiles(
    text: str, platform: PlatformSpec, source: str = "<profiles>"
) -> List[KernelProfile]:
    reader = csv.reader(io.StringIO(text), skipinitialspace=True)
    header: Optional[List[str]] = None
    profiles: List[KernelProfile] = []
    for lineno, row in enumerate(reader, start=1):
        cells = [cell.strip() for cell in row]
        if not cells or not any(cells):
            continue
        if header is None:
            header = [c.lower() for c in cells]
            if header[: len(PROFILE_HEADER)] != PROFILE_HEADER or any(
                c not in OPTIONAL_COLUMNS for c in header[len(PROFILE_HEADER):]
            ):
                raise FormatError(
                    source,
                    f"line {lineno}: expected header {','.join(PROFILE_HEADER)}",
                )
            continue
        if len(cells) != len(header):
            raise FormatError(
                source,
                f"line {lineno}: expected {len(header)} columns, got {len(cells)}",
            )
        record = dict(zip(header, cells))
        try:
            copy_bytes = float(record.pop("copy_bytes"))
            if (
                not math.isfinite(copy_bytes)
                or copy_bytes < 0
                or copy_bytes != int(copy_bytes)
            ):
                raise ValueError(
                    f"copy_bytes {copy_bytes} must be a non-negative integer"
                )
            fields = {
                k: (v if k == "kernel_id" else float(v))
                for k, v in record.items()
                if v != ""
            }
            profiles.append(
                KernelProfile.on_platform(
                    platform, bytes_shared=int(copy_bytes), **fields
                )
            )
        except (ValueError, ValidationError) as e:
            raise FormatError(source, f"line {lineno}: {e}") from e
    if header is None:
        raise FormatError(source, "missing header row")
    return profiles


def load_kernel_profiles(
    path: Union[str, Path], platform: PlatformSpec
) -> List[KernelProfile]:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as e:
        raise FormatError(str(path), f"cannot read kernel profiles: {e}") from e
    profiles = parse_kernel_profiles(text, platform, str(path))
    logger.info(f"Loaded {len(profiles)} kernel profiles from {path}")
    return profiles


def dump_offload_table(
    profiles: Sequence[KernelProfile],
    threshold: float = 1.0,
    overhead_cap: float = 0.10,
) -> str:
    """One row per kernel: metrics and decision, in input order"""
    with_local = any(k.t_local_s is not None for k in profiles)
    header = [
        "kernel_id",
        "t_offload_total_s",
        "saving",
        "overhead_fraction",
        "decision",
    ]
    if with_local:
        header += ["relative_to_local", "remote_slowdown"]
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for k in profiles:
        m = offload_metrics(k)
        row = [
            k.kernel_id,
            repr(m.t_offload_total_s),
            repr(m.saving),
            repr(m.overhead_fraction),
            offload_decision(k, threshold, overhead_cap).value,
        ]
        if with_local:
            row += ["" if m.relative_to_local is None else repr(m.relative_to_local),
                    "" if m.remote_slowdown is None else repr(m.remote_slowdown)]
        writer.writerow(row)
    return buf.getvalue()


def bundled_kernel_profiles(platform: PlatformSpec) -> List[KernelProfile]:
    """Packaged vector-search kernel profiles for PlatformA / PlatformB"""
    key = platform.name.lower().replace("platform", "")
    name = f"kernel_profiles_platform_{key}.csv"
    resource = resources.files("farplan.data").joinpath(name)
    if not resource.is_file():
        raise FormatError(name, f"no bundled kernel profiles for {platform.name}")
    return parse_kernel_profiles(resource.read_text(encoding="utf-8"), platform, name)
