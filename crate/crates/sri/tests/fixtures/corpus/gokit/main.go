package main

import (
	"fmt"
	"os"

	"example.com/gokit/pkg"
)

func main() {
	if len(os.Args) < 2 {
		fmt.Fprintln(os.Stderr, "usage: gokit <word>...")
		os.Exit(2)
	}
	for _, arg := range os.Args[1:] {
		fmt.Println(pkg.SnakeCase(arg), pkg.Reverse(arg))
	}
}
