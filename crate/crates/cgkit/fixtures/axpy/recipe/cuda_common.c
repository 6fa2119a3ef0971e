/* CUDA pieces shared by all CUDA variants */
//_connector:include
#include <cuda_runtime.h>
//_connector:variables
int n_threads = 0;
int n_blocks = 0;
float t_elapsed_ms = 0.0f;
float *d_x = NULL;
float *d_y = NULL;
//_connector:setup
cudaMalloc((void **)&d_x, ${N} * sizeof(float));
cudaMalloc((void **)&d_y, ${N} * sizeof(float));
//_connector:clean
cudaFree(d_x);
cudaFree(d_y);
