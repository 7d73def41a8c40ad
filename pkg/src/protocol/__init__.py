"""Cloning protocol: input states, schedules and runners"""
