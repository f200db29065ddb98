"""
测试包

这个目录包含了 lsm-transfer 项目的所有测试文件。
"""
