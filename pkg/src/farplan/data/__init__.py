"""Bundled workload suite manifest and kernel-profile fixtures"""
