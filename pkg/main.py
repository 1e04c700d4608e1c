import sys

from rumorlab.cli import main as cli_main

QUICK_CHECKS = [
    ["tables"],
    ["analytic", "--dist", "geometric:0.5"],
    ["oracle", "--dist", "constant:1", "--N", "10"],
]

if __name__ == "__main__":
    if len(sys.argv) > 1:
        cli_main()

    print("🚀 No command given, running the quick checks...")
    for argv in QUICK_CHECKS:
        print(f"▶️  rumorlab {' '.join(argv)}")
        try:
            code = cli_main(args=argv, standalone_mode=False)
        except Exception as e:
            print(f"❌ {e}")
            continue
        print("✅ Done" if not code else f"❌ Exited with code {code}")
