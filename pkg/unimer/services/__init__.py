"""流水线各阶段的实现"""
