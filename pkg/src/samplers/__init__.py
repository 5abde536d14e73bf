"""Kinetic samplers"""
