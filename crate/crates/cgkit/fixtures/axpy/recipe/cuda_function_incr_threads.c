//_connector:function
//_param:a = a
//_param:x_i = x[i]
//_param:y_i = y[i]
__global__ void axpy_increment_threads(int n, float a, float *x, float *y) {
  int t = blockIdx.x * blockDim.x + threadIdx.x;
  int n_thr = gridDim.x * blockDim.x;
  for (int i = t; i < n; i += n_thr) {
    //_link:kernel
  }
}
