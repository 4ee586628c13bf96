"""
Transmitter, fiber channel and receiver signal processing
"""
