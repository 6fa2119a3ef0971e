/* one thread per element: scale the block count with the problem size */
//_connector:setup
n_threads = 128;
n_blocks = (${N} + 127) / 128;
