#!/usr/bin/env python3
"""
Startup script for the bayesqst command-line pipeline.
This script provides an easy way to run a subcommand from a source checkout:

    python run.py simulate --qubits 1 --seed 7 --out data/counts.json
    python run.py sample --counts data/counts.json --chains 8 --seed 1 --out-dir data/run
"""

import sys
from pathlib import Path


def main():
    """Main function to start the command-line application."""

    # Add the current directory to Python path
    current_dir = Path(__file__).parent
    sys.path.insert(0, str(current_dir))

    from bayesqst.config import get_settings
    from bayesqst.main import main as cli_main

    # Check if .env file exists
    env_file = current_dir / ".env"
    if not env_file.exists():
        print("⚠️  Warning: .env file not found!")
        print("   Copy env.example to .env to change the QST_* defaults.")
        print("   Using default configuration...")

    settings = get_settings()
    print(f"🚀 Starting {settings.project_name}...")
    print(f"   Workers: {settings.workers or 'all cores'}")
    print(f"   Backend: {settings.joblib_backend}")
    print(f"   Log Level: {settings.log_level}")
    print()

    try:
        exit_code = cli_main(sys.argv[1:])
    except KeyboardInterrupt:
        print("\n🛑 Stopped by user")
        exit_code = 130

    if exit_code != 0:
        print(f"❌ Finished with exit code {exit_code}")
    sys.exit(exit_code)


if __name__ == "__main__":
    main()
