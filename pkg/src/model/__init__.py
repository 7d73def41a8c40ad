"""Device parameters and Hamiltonians"""
