"""Tests for the kinetic Monte Carlo toolkit"""
