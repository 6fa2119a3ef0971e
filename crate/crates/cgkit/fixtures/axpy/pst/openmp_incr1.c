/* AXPY variant: increment by 1, OpenMP */
//_connector:include
#include <omp.h>
//_connector:function
//_param:a = a
//_param:x_i = x[i]
//_param:y_i = y[i]
void axpy_increment_1(int n, float a, float *x, float *y) {
  #pragma omp parallel
  {
    int t = omp_get_thread_num();
    int n_thr = omp_get_num_threads();
    int i_lo = (int)(((long long)n * t) / n_thr);
    int i_hi = (int)(((long long)n * (t + 1)) / n_thr);
    for (int i = i_lo; i < i_hi; i++) {
      //_link:kernel
    }
  }
}
//_connector:variables
int n_threads = 0;
double t_elapsed = 0.0;
//_connector:setup
#pragma omp parallel
{
  #pragma omp single
  n_threads = omp_get_num_threads();
}
//_connector:execute
axpy_increment_1(${N}, ${a}, ${x}, ${y});
double t_start = omp_get_wtime();
for (int rep = 0; rep < ${k}; rep++) {
  axpy_increment_1(${N}, ${a}, ${x}, ${y});
}
t_elapsed = omp_get_wtime() - t_start;
printf("threads %d, elapsed %g s\n", n_threads, t_elapsed);
//_connector:clean
