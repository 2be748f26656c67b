"""
Shared helpers: configuration, logging setup, run manifests, training reports, image files
"""
