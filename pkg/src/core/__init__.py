"""Core orchestration and coordination components"""
