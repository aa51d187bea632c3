# Trainer tests package
