"""Auto Resonance Network simulator.

Modules:
    fxp        Q4.12 fixed point and the serial multiplier model
    approx     PWL / SOI lookup tables for sigmoid, tanh and resonance curves
    resonance  exact resonator mathematics
    moadder    multi-operand adders and carry bounds
    neuron     16-input ARN node and perceptron
    arnnet     two-layer ARN image classifier
    dataio     IDX / CSV loading, sampling, model files
    cli        batch command line
"""

__version__ = "0.1.0"
