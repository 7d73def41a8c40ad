"""Decoherence: master equation, classical noise, decoupling, noisy protocol"""
