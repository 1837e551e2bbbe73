"""
Entry point for running policy_certificates as a module.

Allows: python -m policy_certificates <args>
"""

from .cli import main

if __name__ == "__main__":
    main()
