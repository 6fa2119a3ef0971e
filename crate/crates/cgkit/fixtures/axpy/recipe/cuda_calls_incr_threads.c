//_connector:execute
axpy_increment_threads<<<n_blocks, n_threads>>>(${N}, ${a}, d_x, d_y);
cudaDeviceSynchronize();
//_connector:timed
axpy_increment_threads<<<n_blocks, n_threads>>>(${N}, ${a}, d_x, d_y);
