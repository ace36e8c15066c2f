from randlip.cli import main

main()
