# Verification tests, levels 1-4
