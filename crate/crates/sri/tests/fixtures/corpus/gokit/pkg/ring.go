package pkg

// Ring is a fixed-size circular buffer.
type Ring struct {
	buf  []int
	head int
	size int
}

func NewRing(n int) *Ring {
	return &Ring{buf: make([]int, n)}
}

func (r *Ring) Push(v int) {
	r.buf[(r.head+r.size)%len(r.buf)] = v
	if r.size < len(r.buf) {
		r.size++
	} else {
		r.head = (r.head + 1) % len(r.buf)
	}
}

func (r *Ring) Values() []int {
	out := make([]int, 0, r.size)
	for i := 0; i < r.size; i++ {
		out = append(out, r.buf[(r.head+i)%len(r.buf)])
	}
	return out
}
