"""hypercr-ode - point invariants and hyper-CR Einstein-Weyl classification of third-order ODEs"""
__version__ = "0.1.0"
