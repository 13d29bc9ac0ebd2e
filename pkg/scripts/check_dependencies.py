"""
Check if all required dependencies are installed
"""
import sys

REQUIRED = [
    ('numpy', 'numpy', 'Covariance algebra, FFT, random numbers'),
    ('scipy', 'scipy', 'Faddeeva line shapes, constants, golden-section search, Welch PSD'),
    ('tqdm', 'tqdm', 'Sweep progress bars'),
    ('pytest', 'pytest', 'Test suite'),
]

# scipy pieces the model cannot run without
REQUIRED_SUBMODULES = [
    ('scipy.special', 'wofz'),
    ('scipy.optimize', 'minimize_scalar'),
    ('scipy.signal', 'welch'),
    ('scipy.constants', 'atomic_mass'),
]


def check_dependency(module_name, import_name=None):
    """Check if a dependency is available"""
    if import_name is None:
        import_name = module_name

    try:
        __import__(import_name)
        return True, None
    except ImportError as e:
        return False, str(e)


def check_attribute(module_name, attribute):
    available, error = check_dependency(module_name)
    if not available:
        return False, error
    module = sys.modules[module_name]
    if not hasattr(module, attribute):
        return False, f"{module_name} has no attribute '{attribute}'"
    return True, None


def collect_report():
    """
    Availability of every required package and scipy entry point

    Returns:
        list: (name, available, error) tuples
    """
    report = []
    for package, module, _ in REQUIRED:
        available, error = check_dependency(package, module)
        report.append((package, available, error))
    for module, attribute in REQUIRED_SUBMODULES:
        available, error = check_attribute(module, attribute)
        report.append((f"{module}.{attribute}", available, error))
    return report


def main():
    """Check all dependencies"""
    print("="*70)
    print("  DEPENDENCY CHECK")
    print("="*70)
    print(f"\nPython version: {sys.version}")
    print()

    print("Required Dependencies:")
    print("-" * 70)
    descriptions = {package: description for package, _, description in REQUIRED}
    all_ok = True
    for name, available, error in collect_report():
        status = "[OK]" if available else "[MISSING]"
        print(f"{status} {name:<28} {descriptions.get(name, '')}")
        if not available:
            all_ok = False
            print(f"         {error}")
            print(f"         Install with: pip install {name.split('.')[0]}")

    print("\n" + "="*70)
    if all_ok:
        print("[SUCCESS] All required dependencies are installed!")
    else:
        print("[WARNING] Some required dependencies are missing")
        print("          Install with: pip install -r requirements.txt")
    print("="*70)
    return 0 if all_ok else 1


if __name__ == "__main__":
    sys.exit(main())
