# coding: utf-8
"""
lsm-transfer version information.
"""

__version__ = "0.3.1"
__version_info__ = tuple(int(x) for x in __version__.split("."))
