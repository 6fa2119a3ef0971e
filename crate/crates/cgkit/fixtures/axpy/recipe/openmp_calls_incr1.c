//_connector:execute
axpy_increment_1(${N}, ${a}, ${x}, ${y});
//_connector:timed
axpy_increment_1(${N}, ${a}, ${x}, ${y});
