//_connector:execute
axpy_single_iter<<<n_blocks, n_threads>>>(${N}, ${a}, d_x, d_y);
cudaDeviceSynchronize();
//_connector:timed
axpy_single_iter<<<n_blocks, n_threads>>>(${N}, ${a}, d_x, d_y);
