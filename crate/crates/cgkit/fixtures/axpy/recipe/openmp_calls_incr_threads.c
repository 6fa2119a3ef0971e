//_connector:execute
axpy_increment_threads(${N}, ${a}, ${x}, ${y});
//_connector:timed
axpy_increment_threads(${N}, ${a}, ${x}, ${y});
