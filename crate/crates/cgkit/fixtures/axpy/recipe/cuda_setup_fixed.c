/* fixed launch geometry for the grid-strided kernels */
//_connector:setup
n_threads = 128;
n_blocks = 8;
