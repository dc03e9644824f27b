"""Dim aircraft detection: bottom-hat morphology, HMM filtering, greedy stopping rules."""
