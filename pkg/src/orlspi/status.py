"""Status codes shared by the loop steppers (compiled and fallback)."""

DONE = 0        # reached the horizon
BREAKDOWN = 1   # current gain does not stabilize the current estimate at step t
DIVERGED = 2    # new state exceeded the blow-up cap after step t
NUMERIC = 3     # a linear solve failed unexpectedly at step t
