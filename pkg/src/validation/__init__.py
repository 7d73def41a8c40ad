"""Physicality checks for simulator outputs"""
