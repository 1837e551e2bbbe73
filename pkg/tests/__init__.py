"""
Tests for the policy-certificates package.
"""
