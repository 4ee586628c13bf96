"""
Learned digital backpropagation: the parameterized split-step model and its
filter design routines
"""
