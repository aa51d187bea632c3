# Core numerics tests package
