"""State and process tomography"""
