"""Forward-differences an input array."""
import numpy as np

# @av in signal : f64 [1]
signal = np.zeros(0)

# @av out deriv : f64 [1]
deriv = np.diff(signal)
