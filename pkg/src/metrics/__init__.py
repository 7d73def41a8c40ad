"""Fidelity, concurrence and clone reports"""
