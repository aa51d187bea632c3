# Utility tests package
