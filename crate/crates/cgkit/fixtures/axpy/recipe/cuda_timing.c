/* event-based timing region around the repeated kernel launches */
//_connector:execute
cudaEvent_t ev_start, ev_stop;
cudaEventCreate(&ev_start);
cudaEventCreate(&ev_stop);
cudaEventRecord(ev_start);
for (int rep = 0; rep < ${k}; rep++) {
  //_link:timed
}
cudaEventRecord(ev_stop);
cudaEventSynchronize(ev_stop);
cudaEventElapsedTime(&t_elapsed_ms, ev_start, ev_stop);
