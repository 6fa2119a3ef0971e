/* wall-clock timing region around the repeated AXPY calls */
//_connector:execute
double t_start = omp_get_wtime();
for (int rep = 0; rep < ${k}; rep++) {
  //_link:timed
}
t_elapsed = omp_get_wtime() - t_start;
