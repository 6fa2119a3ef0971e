//_connector:execute
printf("threads %d, blocks %d, elapsed %g ms\n", n_threads, n_blocks, t_elapsed_ms);
