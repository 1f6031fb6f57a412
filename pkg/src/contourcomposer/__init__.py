"""Style-learning melody composer.

Learns off-beat-parametric Markov models and clustered Fourier contours from
phrase-annotated monophonic MIDI melodies, then composes fixed-length phrases
that follow the learned contours.
"""

__version__ = "0.1.0"
