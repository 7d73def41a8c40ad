"""Configuration and command-line runner"""
