from nestprof.main import main

main()
