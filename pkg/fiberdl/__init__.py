"""
fiberdl - split-step fiber simulation and learned digital backpropagation
"""

version = "0.3.0"
