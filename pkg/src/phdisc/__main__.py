from .bench_cli import main

main()
