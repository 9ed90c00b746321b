// PDF pane: renders the session document client-side via the browser's
// built-in viewer and supports programmatic page jumps with #page=N.

export class PdfViewer {
  private container: HTMLElement
  private url: string | null = null
  private page = 1

  constructor(container: HTMLElement) {
    this.container = container
  }

  setDocument(url: string): void {
    this.url = url
    this.page = 1
    this.render()
  }

  setPage(page: number): void {
    if (this.url === null || page === this.page) return
    this.page = page
    this.render()
  }

  clear(): void {
    this.url = null
    this.container.replaceChildren()
  }

  private render(): void {
    if (this.url === null) return
    const embed = document.createElement('embed')
    embed.type = 'application/pdf'
    // Cache-busting fragment change forces the viewer to honor the jump.
    embed.src = `${this.url}#page=${this.page}`
    embed.className = 'pdf-embed'
    this.container.replaceChildren(embed)
  }
}
