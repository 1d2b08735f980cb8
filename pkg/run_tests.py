#!/usr/bin/env python3
"""
Test runner for mlrank

Checks imports, dependencies and file layout, then runs the pytest suites
by group. Use --fast to skip the suites that run monodromy.
"""

import argparse
import subprocess
import sys
import time
from datetime import datetime
from pathlib import Path


class TestRunner:
    """Runs the mlrank checks and test groups and prints a summary"""

    SUITES = {
        'Numerics Tests': ['tests/test_numerics.py', 'tests/test_likelihood.py', 'tests/test_bounds.py'],
        'Formulation Tests': ['tests/test_formulation.py', 'tests/test_tracker.py'],
        'Store Tests': ['tests/test_store.py'],
        'EM Tests': ['tests/test_em.py'],
        'Monodromy Tests': ['tests/test_monodromy.py', 'tests/test_classify.py'],
        'CLI Tests': ['tests/test_cli.py'],
        'Regression Tests': ['tests/test_regression.py'],
    }
    SLOW_SUITES = {'Monodromy Tests', 'CLI Tests', 'Regression Tests'}

    def __init__(self, fast: bool = False):
        self.project_root = Path(__file__).parent
        self.test_results = {}
        self.start_time = time.time()
        self.fast = fast

    def run_command(self, command, description):
        """Run a command and capture results"""
        print(f"\n{description}")
        print("-" * 50)
        try:
            result = subprocess.run(command, capture_output=True, text=True, cwd=self.project_root)
        except Exception as e:
            print(f"ERROR: {e}")
            return {'success': False, 'returncode': -1, 'stdout': '', 'stderr': str(e)}

        success = result.returncode == 0
        print(f"Status: {'PASSED' if success else 'FAILED'}")
        if result.stdout:
            print(result.stdout[-4000:])
        if result.stderr:
            print("Errors:")
            print(result.stderr[-2000:])
        return {
            'success': success,
            'returncode': result.returncode,
            'stdout': result.stdout,
            'stderr': result.stderr
        }

    def run_suite(self, name, paths):
        return self.run_command([sys.executable, "-m", "pytest", *paths, "-v"], f"Running {name}")

    def check_imports(self):
        """Check that all modules can be imported"""
        print("\nChecking Module Imports")
        print("-" * 50)
        modules = [
            'mlrank_sdk',
            'mlrank_sdk.solver',
            'mlrank_sdk.models',
            'mlrank_sdk.likelihood',
            'mlrank_sdk.formulation.kernel_system',
            'mlrank_sdk.formulation.pencil_system',
            'mlrank_sdk.bounds',
            'mlrank_sdk.tracker',
            'mlrank_sdk.monodromy',
            'mlrank_sdk.classify',
            'mlrank_sdk.em',
            'mlrank_sdk.store.json_store',
            'mlrank_sdk.store.sqlite_store',
            'mlrank_sdk.store.store_factory',
            'mlrank_sdk.utils.linalg_utils',
            'mlrank_sdk.utils.checksum_utils',
            'mlrank_sdk.cli.main',
        ]
        results = {}
        for module in modules:
            try:
                __import__(module)
                print(f"  OK   {module}")
                results[module] = True
            except ImportError as e:
                print(f"  FAIL {module}: {e}")
                results[module] = False
        return {'success': all(results.values()), 'results': results}

    def check_dependencies(self):
        """Check that all dependencies are available"""
        print("\nChecking Dependencies")
        print("-" * 50)
        dependencies = {
            'Core': ['numpy', 'scipy', 'pydantic', 'sqlite3'],
            'Optional': ['dotenv'],
            'Testing': ['pytest', 'pytest_cov'],
        }
        results = {}
        all_available = True
        for category, deps in dependencies.items():
            print(f"\n{category}:")
            category_available = True
            for dep in deps:
                try:
                    __import__(dep)
                    print(f"  OK   {dep}")
                except ImportError:
                    print(f"  FAIL {dep} (not installed)")
                    category_available = False
                    if category != 'Optional':
                        all_available = False
            results[category] = category_available
        return {'success': all_available, 'results': results}

    def check_file_structure(self):
        """Check that all required files exist"""
        print("\nChecking File Structure")
        print("-" * 50)
        required_files = [
            'setup.py',
            'requirements.txt',
            'README.md',
            'mlrank_sdk/__init__.py',
            'mlrank_sdk/solver.py',
            'mlrank_sdk/models.py',
            'mlrank_sdk/store/base_store.py',
            'mlrank_sdk/cli/main.py',
            'tests/__init__.py',
            'tests/conftest.py',
        ]
        results = {}
        for file_path in required_files:
            exists = (self.project_root / file_path).exists()
            results[file_path] = exists
            print(f"{'OK  ' if exists else 'MISS'} {file_path}")
        return {'success': all(results.values()), 'results': results}

    def generate_report(self):
        """Print the summary and return True when every group passed"""
        print("\n" + "=" * 60)
        print("MLRANK TEST REPORT")
        print("=" * 60)
        print(f"Duration: {time.time() - self.start_time:.2f} seconds")
        print(f"Generated: {datetime.now().strftime('%Y-%m-%d %H:%M:%S')}")

        passed = sum(1 for result in self.test_results.values() if result.get('success', False))
        print(f"\nGroups: {len(self.test_results)}  passed: {passed}  failed: {len(self.test_results) - passed}")
        for name, result in self.test_results.items():
            status = "PASSED" if result.get('success', False) else "FAILED"
            print(f"  {name}: {status}")
            if not result.get('success', False) and result.get('stderr'):
                print(f"    Error: {result['stderr'][:100]}...")
        return passed == len(self.test_results)

    def run_all_checks(self):
        """Run all checks and tests"""
        print("MLRANK TEST SUITE")
        print(f"Project Root: {self.project_root}")
        print(f"Python Version: {sys.version}")

        self.test_results['File Structure Check'] = self.check_file_structure()
        self.test_results['Module Imports Check'] = self.check_imports()
        self.test_results['Dependencies Check'] = self.check_dependencies()
        for name, paths in self.SUITES.items():
            if self.fast and name in self.SLOW_SUITES:
                print(f"\nSkipping {name} (--fast)")
                continue
            self.test_results[name] = self.run_suite(name, paths)
        return self.generate_report()


def main():
    """Main entry point"""
    parser = argparse.ArgumentParser(description="Run the mlrank checks and test suites")
    parser.add_argument("--fast", action="store_true", help="Skip monodromy, CLI and regression suites")
    args = parser.parse_args()

    runner = TestRunner(fast=args.fast)
    try:
        ok = runner.run_all_checks()
    except KeyboardInterrupt:
        print("\n\nTest run interrupted by user")
        sys.exit(1)
    sys.exit(0 if ok else 1)


if __name__ == "__main__":
    main()
