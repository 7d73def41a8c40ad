"""Numerical kernel: linear algebra helpers and the error hierarchy"""
