"""
Gradient-based training of LDBP models: reverse-mode gradient, Adam,
tap pruning and the training loop
"""
