# coding: utf-8
"""
服务模块初始化
"""
