"""Discrete, smooth and Lennard-Jones potentials"""
