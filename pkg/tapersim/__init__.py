"""tapersim - femtosecond-laser written waveguide taper simulator."""
__version__ = "0.3.0"
