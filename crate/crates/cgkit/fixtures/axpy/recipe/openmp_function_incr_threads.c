//_connector:function
//_param:a = a
//_param:x_i = x[i]
//_param:y_i = y[i]
void axpy_increment_threads(int n, float a, float *x, float *y) {
  #pragma omp parallel
  {
    int t = omp_get_thread_num();
    int n_thr = omp_get_num_threads();
    for (int i = t; i < n; i += n_thr) {
      //_link:kernel
    }
  }
}
