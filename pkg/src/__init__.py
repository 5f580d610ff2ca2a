# fpsearch
# Fixed-point quantum search simulator: Grover rotations with a cloned
# ancilla and a corrected-ratio stopping rule.

__version__ = "1.0.0"
