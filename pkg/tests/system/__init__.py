# System tests package
