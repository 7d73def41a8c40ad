"""Parallel batch execution"""
