/* AXPY variant: increment by number of threads, CUDA */
//_connector:include
#include <cuda_runtime.h>
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
//_connector:variables
int n_threads = 0;
int n_blocks = 0;
float t_elapsed_ms = 0.0f;
float *d_x = NULL;
float *d_y = NULL;
//_connector:setup
n_threads = 128;
n_blocks = 8;
cudaMalloc((void **)&d_x, ${N} * sizeof(float));
cudaMalloc((void **)&d_y, ${N} * sizeof(float));
//_connector:execute
cudaMemcpy(d_x, ${x}, ${N} * sizeof(float), cudaMemcpyHostToDevice);
cudaMemcpy(d_y, ${y}, ${N} * sizeof(float), cudaMemcpyHostToDevice);
axpy_increment_threads<<<n_blocks, n_threads>>>(${N}, ${a}, d_x, d_y);
cudaDeviceSynchronize();
cudaEvent_t ev_start, ev_stop;
cudaEventCreate(&ev_start);
cudaEventCreate(&ev_stop);
cudaEventRecord(ev_start);
for (int rep = 0; rep < ${k}; rep++) {
  axpy_increment_threads<<<n_blocks, n_threads>>>(${N}, ${a}, d_x, d_y);
}
cudaEventRecord(ev_stop);
cudaEventSynchronize(ev_stop);
cudaEventElapsedTime(&t_elapsed_ms, ev_start, ev_stop);
cudaMemcpy(${y}, d_y, ${N} * sizeof(float), cudaMemcpyDeviceToHost);
printf("threads %d, blocks %d, elapsed %g ms\n", n_threads, n_blocks, t_elapsed_ms);
//_connector:clean
cudaFree(d_x);
cudaFree(d_y);
