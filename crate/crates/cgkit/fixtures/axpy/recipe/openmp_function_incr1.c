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
