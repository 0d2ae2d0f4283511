#!/usr/bin/env python3
"""
Setup Verification Script for the Multi-Scale Graph Wavelet library

This script verifies that all prerequisites are met before running the
command line, the examples or the Streamlit explorer.
"""

import sys


def check_python_version():
    """Check if Python version is 3.10 or higher."""
    print("Checking Python version...")
    version = sys.version_info
    if version.major >= 3 and version.minor >= 10:
        print(f"✅ Python {version.major}.{version.minor}.{version.micro} detected")
        return True
    else:
        print(f"❌ Python 3.10+ required. Found: {version.major}.{version.minor}.{version.micro}")
        return False


def check_dependencies():
    """Check if required packages are installed."""
    print("\nChecking dependencies...")
    required = [
        "numpy",
        "scipy",
        "torch",
        "sklearn",
        "streamlit",
        "opentelemetry",
    ]

    missing = []
    for package in required:
        try:
            __import__(package)
            print(f"✅ {package} installed")
        except ImportError:
            print(f"❌ {package} not found")
            missing.append(package)

    if missing:
        print(f"\n⚠️  Missing packages: {', '.join(missing)}")
        print("Run: pip install -r requirements.txt")
        return False

    return True


def check_package():
    """Check that msgwnn itself is importable."""
    print("\nChecking msgwnn package...")
    try:
        import msgwnn

        print(f"✅ msgwnn {msgwnn.__version__} importable")
        return True
    except ImportError as e:
        print(f"❌ msgwnn not importable: {e}")
        print("Run: pip install -e .")
        return False


def check_wavelet_inversion():
    """Check that Psi_s Psi_s^{-1} = I on a small path graph."""
    print("\nChecking wavelet numerics...")
    try:
        import numpy as np

        from msgwnn.graph import Graph, normalized_laplacian, path_adjacency
        from msgwnn.spectral import eigendecompose, wavelet_basis_exact

        adjacency = path_adjacency(9)
        graph = Graph(n=9, adjacency=adjacency, embeddings=np.ones(9))
        pair = wavelet_basis_exact(eigendecompose(normalized_laplacian(graph)), 1.0)
        error = np.abs(pair.forward @ pair.inverse - np.eye(9)).max()
        if error < 1e-6:
            print(f"✅ Wavelet basis inverts to identity (max error {error:.1e})")
            return True
        print(f"❌ Wavelet inversion error too large: {error:.1e}")
        return False
    except Exception as e:
        print(f"❌ Error checking wavelet numerics: {str(e)[:100]}")
        return False


def check_torch_float64():
    """Check that torch runs float64 matrix products on the CPU."""
    print("\nChecking torch...")
    try:
        import torch

        torch.set_num_threads(1)
        x = torch.ones(4, 4, dtype=torch.float64)
        if float((x @ x).sum()) == 64.0:
            print(f"✅ torch {torch.__version__} float64 CPU ok")
            return True
        print("❌ Unexpected torch result")
        return False
    except Exception as e:
        print(f"⚠️  Error checking torch: {str(e)[:100]}")
        return False


def main():
    """Run all verification checks."""
    print("=" * 60)
    print("Multi-Scale Graph Wavelets - Setup Verification")
    print("=" * 60)

    checks = [
        ("Python Version", check_python_version()),
        ("Dependencies", check_dependencies()),
        ("msgwnn Package", check_package()),
        ("Wavelet Numerics", check_wavelet_inversion()),
        ("Torch", check_torch_float64()),
    ]

    print("\n" + "=" * 60)
    print("Verification Summary")
    print("=" * 60)

    all_passed = True
    for name, passed in checks:
        status = "✅ PASS" if passed else "❌ FAIL"
        print(f"{status} - {name}")
        if not passed:
            all_passed = False

    print("=" * 60)

    if all_passed:
        print("\n🎉 All checks passed! You're ready to go.")
        print("\nRun: streamlit run app.py")
        print("Or:  ./run_app.sh")
        print("Or:  msgwnn --help")
        return 0
    else:
        print("\n⚠️  Some checks failed. Please fix the issues above.")
        print("\nFor help, see README.md")
        return 1


if __name__ == "__main__":
    sys.exit(main())
