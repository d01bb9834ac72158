"""latentlens file for ensuring the package is executable
as `latentlens` and `python -m latentlens`
"""

from latentlens.cli import run

if __name__ == "__main__":
    run()
